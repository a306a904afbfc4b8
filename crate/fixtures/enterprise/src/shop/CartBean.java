package shop;

import java.util.ArrayList;
import java.util.List;
import javax.annotation.PostConstruct;
import javax.ejb.Stateless;

@Stateless
public class CartBean {

    private List<String> items;

    @PostConstruct
    public void open() {
        items = new ArrayList<String>();
    }

    public int count() {
        return items.size();
    }
}
