package com.sun.j2ee.blueprints.petstore.taglib.list;

import java.io.IOException;
import javax.servlet.jsp.JspTagException;
import javax.servlet.jsp.JspWriter;
import javax.servlet.jsp.tagext.BodyTagSupport;

public class PrevFormTag extends BodyTagSupport {

    private String action;

    public void setAction(String action) {
        this.action = action;
    }

    public int doStartTag() throws JspTagException {
        return EVAL_BODY_TAG;
    }

    public int doEndTag() throws JspTagException {
        try {
            JspWriter out = pageContext.getOut();
            out.print("<form method=\"GET\" action=\"" + action + "\">");
            out.print(getBodyContent().getString());
            out.print("</form>");
        } catch (IOException ioe) {
            throw new JspTagException("PrevFormTag: " + ioe.getMessage());
        }
        return EVAL_PAGE;
    }
}
